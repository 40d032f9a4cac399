"""Tests de amr_cam.helpers."""
