"""Tests de amr_cam.network."""
