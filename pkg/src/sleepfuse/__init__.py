"""sleepfuse: multimodal scEEG + PPG sleep staging at desk scale."""

__version__ = "0.1.0"
