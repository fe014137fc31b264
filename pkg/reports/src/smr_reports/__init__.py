"""Chart rendering for smr-bench output: timeline graphs, throughput
scaling, and garbage-per-epoch plots, all with structural element
manifests for testing."""

from .plots import (TimelinePlotSpec, plot_garbage, plot_scaling,
                    plot_timeline)
from .traces import (Event, TimelineData, read_manifest, read_summary_csv,
                     read_thread_csv, read_timeline_dir)

__all__ = ["Event", "TimelineData", "TimelinePlotSpec", "plot_garbage",
           "plot_scaling", "plot_timeline", "read_manifest",
           "read_summary_csv", "read_thread_csv", "read_timeline_dir"]
