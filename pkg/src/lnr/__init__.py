"""lnr: a self-contained desk-scale stack for a modular networked monitoring robot.

The stack is fully deterministic: an emulated microcontroller behind a
parallel-port register file, a differential-drive world with wheel-tick
and compass generation, a host-side port driver, a software DSP pipeline,
dead-reckoning navigation, an installable data-processing (DAPS) layer
with air-quality warnings, and an HTTP control/telemetry service.
"""

__version__ = "0.1.0"
