"""Tests for Nocturna Telegram Bot."""

