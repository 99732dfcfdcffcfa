from .agent import CHECKPOINT_KIND, VotingAgent, allocation_seed
from .controller import ControllerConfig, VoteState, VotingComposite, init_votes
from .transforms import ActionTransform, RewardMapAdapter, TransformCandidate

__all__ = [
    "ActionTransform",
    "CHECKPOINT_KIND",
    "ControllerConfig",
    "RewardMapAdapter",
    "TransformCandidate",
    "VoteState",
    "VotingAgent",
    "VotingComposite",
    "allocation_seed",
    "init_votes",
]
