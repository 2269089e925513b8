"""Non-negative matrix and tensor factorization toolkit with audio and video
anomaly pipelines."""

__version__ = "0.1.0"

from .errors import (DegenerateFactorError, DimensionError, DomainError, FormatError,
                     LatentFireError, ParameterError, RankSelectionError,
                     UndefinedInputError)
from .frontend import (AudioClip, Spectrogram, mel_filterbank, mel_spectrogram,
                       stft_magnitude, temporal_dft_tensor)
from .nmf import NmfConfig, NmfModel, mu_step_frobenius, mu_step_kl, nmf_solve, objective
from .ntf import (CpdModel, NtfConfig, TtModel, TuckerModel, cpd_reconstruct, ncpd_solve,
                  ntt_solve, ntucker_solve, tt_reconstruct, tucker_reconstruct)
from .pipelines import (AudioConfig, Event, EventReport, VideoConfig, audio_pipeline,
                        score_activations, video_pipeline)
from .salient import SalientReport, SpatioTemporalTensor, ntd1_decompose, select_salient
from .selection import (KSelectionReport, PerturbConfig, SelectionRule, cluster_factors,
                        select_k, select_tensor_ranks, silhouette_scores)
from .tensor import (fold, khatri_rao, kl_divergence, mode_n_product, relative_error,
                     unfold)
