"""Pipeline-parallel local learning and its single-thread reference."""

from .messages import ParamSnapshot, PipelineMessage
from .schedule import OracleResult, TickEntry, delayed_update_oracle, process_slot, tick_table
from .stats import PipelineStats, PipelineTrace, ideal_busy_fraction, throughput_report, write_stats_csv
from .workers import PipelineResult, run_pipeline, run_pipeline_epoch
