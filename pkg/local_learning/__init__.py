"""Local learning engine with coupled auxiliary heads, pipeline execution and cost analysis."""

__version__ = "0.1.0"
