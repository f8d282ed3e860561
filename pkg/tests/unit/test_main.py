"""Tests for the main module."""

import signal
from unittest.mock import call, patch

import pytest

import raman_memory.__main__ as entry


@pytest.mark.unit
def test_main_exits_with_cli_status():
    """Test that main exits with the status returned by the command line."""
    with patch("signal.signal"), patch("raman_memory.cli.run_cli", return_value=3) as mock_run:
        with pytest.raises(SystemExit) as exc_info:
            entry.main(["verify"])
    mock_run.assert_called_once_with(["verify"])
    assert exc_info.value.code == 3


@pytest.mark.unit
def test_graceful_shutdown_handler():
    """Test the shutdown handler for SIGINT."""
    with patch("sys.exit") as mock_exit:
        with patch("raman_memory.__main__.logger") as mock_logger:
            entry.handle_interrupt(signal.SIGINT, None)

            mock_logger.info.assert_called_once_with(f"Received signal {signal.SIGINT}, shutting down...")
            mock_exit.assert_called_once_with(130)


@pytest.mark.unit
def test_keyboard_interrupt_handling():
    """Test that keyboard interrupts exit with status 130."""
    with patch("signal.signal"), patch("raman_memory.cli.run_cli", side_effect=KeyboardInterrupt):
        with patch("raman_memory.__main__.logger") as mock_logger:
            with pytest.raises(SystemExit) as exc_info:
                entry.main([])

    mock_logger.info.assert_any_call("Keyboard interrupt received. Shutting down...")
    assert exc_info.value.code == 130


@pytest.mark.unit
def test_signal_handler_registration():
    """Test that the signal handler is registered for SIGINT and SIGTERM."""
    with patch("signal.signal") as mock_signal, patch("raman_memory.cli.run_cli", return_value=0):
        with pytest.raises(SystemExit):
            entry.main([])

    assert mock_signal.call_count == 2
    mock_signal.assert_has_calls([call(signal.SIGINT, entry.handle_interrupt), call(signal.SIGTERM, entry.handle_interrupt)], any_order=True)
