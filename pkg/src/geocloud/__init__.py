"""Point-cloud comparison through Gaussian mixtures fitted to 2-D latent embeddings."""

__version__ = "0.1.0"

from .cloud import PointCloud, pairwise_distance, distance_matrix, minmax_normalize
from .ply import load_ply, write_ply, read_ply
from .shapes import generate_cube, generate_cone, generate_sphere, ShapeSpec
from .sampling import fps, extract_samples, split_dataset, SampleSet, DataSplit
from .metrics import hausdorff, chamfer, emd, dj, MetricValue
from .gmm import (GmmParams, EmConfig, FitReport, gaussian_pdf, gmm_pdf, fit_em,
                  canonicalize, param_space_dim)
from .divergence import EvalGrid, DivergenceResult, make_grid, kl_grid, mskl
from .reduction import (LatentSet, PcaModel, AutoencoderParams, TrainConfig, pca_fit_transform,
                        chamfer_loss, ae_forward, ae_train, embed)
from .audio import (AudioSignal, Spectrogram, load_wav, hann_window, stft, log_magnitude,
                    spectrogram_to_cloud, aggregate_and_save)
from .pipeline import PipelineConfig, ComparisonReport, run_pipeline, emit_table
