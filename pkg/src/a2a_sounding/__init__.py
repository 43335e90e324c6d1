"""Simulated air-to-air channel sounding toolkit.

Zadoff-Chu probing, a spherical measurement trajectory, a geometric
multipath channel, correlation-based CIR extraction, delay and path-loss
statistics, and a point-mass path-following comparison.
"""
from .campaign import CampaignConfig, default_config, load_config, run_campaign
from .channel import (AntennaModel, ChannelRealization, Environment, MultipathComponent,
                      PathLossModel, Reflector, apply_channel, default_environment,
                      path_loss_db, simulate_channel)
from .errors import (ConfigError, DivergenceError, DomainError, FitError, GeometryError,
                     InputError, ParameterError, PersistenceError, SounderError, TuningError)
from .guidance import FollowerConfig, VehicleState, follow_trajectory, tune_follower
from .metrics import aggregate_campaign, empirical_cdf, fit_path_loss, rms_delay_spread
from .sounder import ExtractedCir, SounderCapture, extract_cir
from .trajectory import (PoseSample, SphereTrajectoryParams, assign_heading,
                         sphere_path_arclength, sphere_path_parametric, sphere_point_parametric)
from .waveform import ProbeWaveform, ZcParams, generate_zc

__version__ = "0.1.0"
