"""Pure-numpy fallback for the compiled reservoir recurrence."""

import numpy as np


def drive_states(W, drive, x0):
    """Iterate ``x_t = tanh(W x_{t-1} + drive_t)`` and return all states."""
    W = np.ascontiguousarray(W, dtype=np.float64)
    drive = np.ascontiguousarray(drive, dtype=np.float64)
    x = np.ascontiguousarray(x0, dtype=np.float64)
    k = W.shape[0]
    if W.shape[1] != k or drive.shape[1] != k or x.shape[0] != k:
        raise ValueError("shape mismatch between W, drive and x0")

    states = np.empty_like(drive)
    for t in range(drive.shape[0]):
        x = np.tanh(drive[t] + W @ x)
        states[t] = x
    return states
