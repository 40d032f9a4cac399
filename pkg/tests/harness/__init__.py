"""Tests de amr_cam.harness."""
