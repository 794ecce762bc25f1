class ParameterError(ValueError):
    """Raised when an input parameter is outside its valid domain."""
