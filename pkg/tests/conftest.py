import torch

# double precision everywhere FD gradients are involved; keep CPU threads modest
torch.set_num_threads(2)
