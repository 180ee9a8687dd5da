"""
Reporting Package - Forecast Band Figures
=========================================

1. bands.py - deterministic SVG band figures and the band CSV
"""

from .bands import BandReport, band_frame, band_pairs, draw_bands, save_svg, write_band_report

__all__ = [
    "BandReport",
    "band_frame",
    "band_pairs",
    "draw_bands",
    "save_svg",
    "write_band_report",
]
