"""hodge4d-plots: static figures from hodge4d CSV/VTK outputs."""

from .io import ConvergenceTable, SliceData, read_convergence_csv, read_vtk_slice
from .plots import PlotJob, fit_slope, plot_convergence, plot_slice, run_job

__version__ = "0.1.0"
