"""OFDM channel estimation toolkit: 3GPP TDL channel synthesis, pilot-based
LS observations, mixed-scenario datasets, and frequency-time division
estimator networks with optional SNR attention."""

from .channel import (FadingConfig, FadingProcess, TapGains, TdlModel,
                      TdlProfile, doppler_from_speed, freq_response,
                      load_profile, spawn_fading)
from .dataset import (Dataset, MixConfig, ScenarioDraw, build_dataset,
                      read_dataset, sample_scenario, write_dataset)
from .estimators import (BilinearBaselineEstimator, FreqTimeNetEstimator,
                         interp_baseline)
from .models import (AttentionBlock, FreqBlock, FreqTimeConfig, FreqTimeNet,
                     TimeBlock, attention_block_eval, complexity_report,
                     load_model, save_model)
from .ofdm import (ChannelGrid, GridConfig, PilotObservation, PilotSequence,
                   channel_grid, grid_to_tensor, ls_estimate,
                   make_pilot_sequence, observe, pilot_channel,
                   pilot_pattern, simulate_pilot_rx)
from .training import (EvalReport, TrainConfig, evaluate_mse, scenario_eval,
                       train_network)

__version__ = "0.1.0"
