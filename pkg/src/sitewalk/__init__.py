"""Desk-scale robotic reality-capture stack for construction progress
monitoring: building-model planning, a simulated fiducial-localized
quadruped, an authenticated relay, and an operator gateway."""

__version__ = "0.1.0"
