"""steerhier: hierarchy of steering measurement settings for qubit pairs.

Subpackages
-----------
qcore      two-qubit state algebra (Pauli representation, random states, SLOCC)
steer_sdp  assemblages and the LHS-membership feasibility solver with certificates
criteria   closed-form BHQB / CJWR baseline criteria
features   steering-ellipsoid computations and the five feature encoders
protocol   the SDP labeling pipeline and dataset production
mlp        from-scratch feed-forward classifier
atlas      generalized-Werner families, hierarchy maps, borders, MAD
cli        command-line surface
"""

__version__ = "0.1.0"
