"""
Defining a process and reading its causal structure
===================================================

Parse the bundled loan approval process, check it for structural problems,
and derive which attributes can causally change which activities.
"""

from procex import (
    derive_causality_graph,
    load_fixture,
    parse_process,
    reachable_indicators,
    serialize_process,
    validate,
)

# The package ships one ready-made definition: a loan approval process with
# two numeric attributes, an attribute-guarded routing gateway, and two
# probabilistic outcome gateways.
loan = load_fixture()
print(serialize_process(loan))

# validate() returns findings as data instead of raising, which suits
# linting workflows. A clean definition has none.
report = validate(loan)
print("findings:", list(report.findings) or "none")

# A broken definition collects one finding per problem.
broken = """
process demo
attr a: numeric in [10, 0]
start -> g
gateway g choice { 0.5 -> x 0.6 -> y }
end x label POSITIVE
end y label NEGATIVE
"""
# parse_process would raise here, so we go through the structure-only parser.
from procex.process_model import parse_process_structure

for finding in validate(parse_process_structure(broken)).findings:
    print(f"  {finding.rule}: {finding.message}")

# The causal graph contains an edge (attribute, activity) exactly when the
# attribute appears in a routing guard that can switch the activity on or
# off. Both review activities depend on both guard attributes; the shared
# submit_application step depends on neither.
graph = derive_causality_graph(loan)
for source, target in graph.edges:
    print(f"  {source} -> {target}")

# For fixed attribute values, only some activity combinations are reachable.
# With a low score and a large amount the route is forced through the
# skilled review.
vectors = reachable_indicators(
    loan, {"credit_score": 580.0, "loan_amount": 300000.0}
)
print("reachable indicator vectors:", sorted(vectors))
print("activity order:", loan.activity_names)
