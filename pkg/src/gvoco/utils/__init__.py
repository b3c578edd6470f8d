from .validation import check_nonnegative, check_positive, check_vector, norm

__all__ = ["check_vector", "check_positive", "check_nonnegative", "norm"]
