"""Tests de amr_cam.recalib."""
