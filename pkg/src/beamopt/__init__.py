"""Beamforming optimisation toolkit: adaptive receive beamformers, conic and
manifold solvers, multicast, hybrid, joint radar-communications and IRS design."""
from .model import (ArrayGeometry, ChannelMatrix, Scenario, SectorMatrix, fraunhofer_distance, generate_snapshots,
                    geometric_channel, near_field_steering, sample_covariance, sector_matrices, steering_matrix,
                    steering_vector, true_covariance)

__version__ = "0.1.0"
