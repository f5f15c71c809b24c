from .checkpoint import load_checkpoint, save_checkpoint
from .gradcheck import grad_check, loss_grad_check
from .losses import (DistanceKind, MsParams, batch_loss, loss_contrastive, loss_ms, loss_triplet,
                     ms_mine, pairwise_distance, pairwise_similarity)
from .net import EmbeddingNet, NetConfig
from .optim import Adam, PlateauSchedule, adam_step
from .sampler import epoch_batches, song_batches
from .train import (PreparedSong, TrainConfig, TrainResult, prepare_song, prepare_songs,
                    train_model, validate_model)
