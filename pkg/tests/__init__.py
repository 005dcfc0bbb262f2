"""Tests for the IoT attack-circuit engine."""
