from .linial import LinialProgram, final_palette, linial_color, linial_coloring_program, linial_schedule
from .mapping import ColorMapping, bm_tree_mapping, next_power_of_two
from .trees import (Broadcast, Convergecast, TreeInput, TreeLabeling, broadcast_program,
                    convergecast_program, labeling_from_depths)
