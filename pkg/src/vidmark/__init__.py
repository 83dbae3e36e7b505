"""Blind video watermarking in the shape of DTCWT sub-band singular values."""
from .video_io import Frame, Video, read_y4m, write_y4m, synth_video
from .watermark import EmbedParams, embed_sequence, extract_sequence
from .metrics import psnr, nc, ber

__version__ = "0.1.0"

__all__ = [
    "Frame", "Video", "read_y4m", "write_y4m", "synth_video",
    "EmbedParams", "embed_sequence", "extract_sequence", "psnr", "nc", "ber",
]
