from .contraction import ContractionReport, conjecture_map, contraction_check
from .rules import (FollowerEstimator, belief_deficit, belief_update, boltzmann, conjecture_target,
                    follower_update_rlhpa1, follower_update_rlhpa2, leader_update, product_measure,
                    q_update, rate, sample_action)
from .runners import (NONCOOP, RLHPA1, RLHPA2, RUNNERS, LearningConfig, RunTrace,
                      run_noncooperative, run_rlhpa1, run_rlhpa2)
