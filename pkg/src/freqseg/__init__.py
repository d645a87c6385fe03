"""freqseg: frequency-selective filtering for skeleton-based temporal
action segmentation, with a self-contained autodiff/FFT substrate,
segmentation metrics, and a synthetic-data experiment harness."""

__version__ = "0.1.0"
