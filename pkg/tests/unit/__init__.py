"""Unit tests for raman-memory."""
