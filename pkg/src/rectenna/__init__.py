"""RF energy-harvesting (rectenna) chain design and simulation."""

__version__ = "0.1.0"
