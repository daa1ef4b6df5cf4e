from .config import DEFAULTS, SCHEMA_VERSION, ConfigError, ExperimentConfig, load_schema, validate
from .experiment import ResultTable, aggregate, run_experiment, thread_count, trial_rng
from .dataset import export_dataset, read_dataset, record_seed, regenerate
from .io import (csv_text, design_from_json, design_to_json, emit_beampattern, render_svg, svg_text,
                 weights_from_json, weights_to_json, write_csv, write_json)
from .methods import REGISTRY
