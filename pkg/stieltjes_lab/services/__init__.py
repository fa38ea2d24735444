"""Seeded instance generators and verification suites built on the library core."""
