"""Test suite for the oscillator QFT simulator."""
