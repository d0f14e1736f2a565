"""Input checks shared by the estimators."""
import numpy as np
from sklearn.utils.validation import check_array, check_X_y


def check_binary_images(X, n_pixels=None):
    """Validate a 2-D array of binary images and return it as bool."""
    X = check_array(X, dtype=None, ensure_2d=True)
    if X.dtype != bool:
        if not np.isin(X, (0, 1)).all():
            raise ValueError("images must be binary (0/1 or bool)")
        X = X.astype(bool)
    if n_pixels is not None and X.shape[1] != n_pixels:
        raise ValueError(f"X has {X.shape[1]} pixels, estimator was fitted with {n_pixels}")
    return X


def check_binary_xy(X, y):
    X, y = check_X_y(X, y, dtype=None)
    return check_binary_images(X), y


def seed_streams(random_state, n):
    """``n`` independent child seed sequences derived from ``random_state``."""
    if isinstance(random_state, np.random.SeedSequence):
        return random_state.spawn(n)
    return np.random.SeedSequence(random_state).spawn(n)
