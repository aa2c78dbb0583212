"""Lifetime-maximizing routing for sensor networks with a mobile source."""
