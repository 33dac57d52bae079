"""Global optimality conditions for QCQPs through SDP and DNN relaxations."""

from .certifier import CertifyOptions, CondStatus, ConditionReport, certify
from .dnn_relaxation import DnnCertifyOptions, certify_dnn
from .qcqp_model import QcqpInstance, QuadraticForm, parse_instance, serialize_instance
from .sdp_solver import SolverOptions, Status

__all__ = ["CertifyOptions", "CondStatus", "ConditionReport", "certify", "DnnCertifyOptions",
           "certify_dnn", "QcqpInstance", "QuadraticForm", "parse_instance",
           "serialize_instance", "SolverOptions", "Status"]
