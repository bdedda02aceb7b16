"""semidamp: desk-scale workbench for damped semiclassical Schrodinger operators."""

__version__ = "0.1.0"
