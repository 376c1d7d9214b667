from .merge import MergeInput, MergeProgram, merge_direct, merge_two_level
from .model import (ColoredClustering, UniquelyLabeledClustering, ValidationReport, VirtualGraph,
                    build_virtual_graph, random_clustering, singleton_clustering, validate_colored,
                    validate_uniquely_labeled)
from .onestep import Onestep, OnestepOutput, onestep_program
from .pipeline import PipelineParams, PipelineProgram, pipeline
from .simulate import ClusterAggregate, ClusterInput, VirtualSimulation, simulate_on_virtual
