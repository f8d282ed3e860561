"""Tests for raman-memory."""
