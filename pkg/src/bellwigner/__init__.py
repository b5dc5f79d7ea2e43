"""Bell and Wigner inequalities for three two-outcome apparatuses.

Submodules:

* :mod:`~bellwigner.quantum_model`: pair probabilities and expectations.
* :mod:`~bellwigner.inequalities`: Wigner/Bell margins and angle-grid scans.
* :mod:`~bellwigner.triple_feasibility`: signed triple laws from pair marginals.
* :mod:`~bellwigner.experiment_sim`: seeded count tables and estimators.
* :mod:`~bellwigner.extended_model`: the missed-detection model and simplex enumeration.
* :mod:`~bellwigner.report` and :mod:`~bellwigner.cli`: file formats and the command line.
"""

__version__ = "0.1.0"
