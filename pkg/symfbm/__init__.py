"""
symfbm: nu-symmetric Riemann sums for fractional Brownian motion at the
critical Hurst parameter H = 1/(4l + 2), with the limit constants and a
Monte Carlo harness that checks them.
"""
__version__ = "0.1.0"
