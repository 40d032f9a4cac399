"""Suite de tests de amr_cam."""
