"""Engine components, one sub-package per concern."""
