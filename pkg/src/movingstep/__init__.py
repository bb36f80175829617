"""Scattering off a potential step moving at constant velocity.

``movingstep.analytics`` holds the closed-form plane-wave solutions,
``movingstep.tdse`` a wave-packet propagator that checks them, and
``movingstep.scenario`` / ``movingstep.cli`` the configuration, sweep and
output layer.
"""

__version__ = "0.1.0"
