"""Figure rendering for bisectquest CSV outputs."""

__version__ = "0.1.0"

from .render import FigureSpec, RenderError, render

__all__ = ["FigureSpec", "RenderError", "render"]
