"""Test package for CPWalk."""
