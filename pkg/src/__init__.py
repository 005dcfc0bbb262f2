"""IoT attack circuits: CVE-driven flow networks for device and network scoring."""

__version__ = "0.1.0"
