from setuptools import setup, find_packages

setup(
    name="symfbm",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "examples", "examples.*"]),
    package_data={"symfbm": ["kernels/*.cl"]},
    python_requires=">=3.9",
    install_requires=["numpy", "scipy"],
    extras_require={"opencl": ["pyopencl"], "test": ["pytest"]},
    entry_points={"console_scripts": ["symfbm = symfbm.cli:main"]},
    description="Symmetric Riemann sums for fractional Brownian motion at the critical Hurst parameter",
)
