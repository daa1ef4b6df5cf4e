from .design import (HybridBeamformer, HybridConfig, default_dictionary, mo_hybrid, normalize_power,
                     omp_hybrid, optimal_digital, phase_extraction_init, quantize_phases, quantized_hybrid,
                     spectral_efficiency, spectral_efficiency_wideband, wideband_hybrid)
from .squint import beam_squint_correct, beam_squint_deviation, pointing_directions, squinted_analog
from .jrc import JRCConfig, jrc_hybrid, jrc_objective
from .adc import adc_quantize, uniform_quantizer, zf_mrc_combine
