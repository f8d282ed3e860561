"""End-to-end tests of the raman-memory command line."""
