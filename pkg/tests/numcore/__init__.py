"""Tests de amr_cam.numcore."""
