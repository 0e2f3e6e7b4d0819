"""Shared helpers for the test suite: deterministic synthetic textures."""
import numpy as np


def smooth_noise(shape, rng, sigma=2.0):
    """Band-limited uint8 texture: white noise blurred with a separable Gaussian.

    Smoothing keeps neighboring pixels correlated, which is what makes
    bilinear sampling, block matching, and gradient features behave like
    they do on natural images instead of white noise.
    """
    field = rng.standard_normal(shape)
    radius = max(1, int(3 * sigma))
    xs = np.arange(-radius, radius + 1)
    kernel = np.exp(-0.5 * (xs / sigma) ** 2)
    kernel /= kernel.sum()
    for axis in (0, 1):
        field = np.apply_along_axis(np.convolve, axis, field, kernel, mode="same")
    lo, hi = field.min(), field.max()
    img = (field - lo) / (hi - lo) * 255.0
    return img.astype(np.uint8)


def paste(frame, x, y, texture):
    """Write a texture block into a frame at integer offsets, clipped."""
    h, w = texture.shape
    fh, fw = frame.shape
    x0, y0 = max(x, 0), max(y, 0)
    x1, y1 = min(x + w, fw), min(y + h, fh)
    if x1 > x0 and y1 > y0:
        frame[y0:y1, x0:x1] = texture[y0 - y : y1 - y, x0 - x : x1 - x]
    return frame
