"""Tests de amr_cam.data."""
