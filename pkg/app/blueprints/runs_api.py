"""
Runs API Blueprint for CPWalk.

Lists recorded runs and returns one run with its config echo and report.
"""

from flask import Blueprint, jsonify, request

from app.database import RUN_STATUSES, Run, db

runs_api_bp = Blueprint(
    "runs_api",
    __name__,
    url_prefix="/api/runs",
)

MAX_LIMIT = 500


@runs_api_bp.route("", methods=["GET"])
def list_runs():
    """Newest runs first; optional ?subcommand=, ?status= and ?limit= filters."""
    query = db.select(Run).order_by(Run.id.desc())
    subcommand = request.args.get("subcommand")
    if subcommand:
        query = query.filter_by(subcommand=subcommand)
    status = request.args.get("status")
    if status:
        if status not in RUN_STATUSES:
            return jsonify({"error": f"Unknown status '{status}'"}), 400
        query = query.filter_by(status=status)
    limit = request.args.get("limit", 50, type=int)
    if limit is None or not 1 <= limit <= MAX_LIMIT:
        return jsonify({"error": f"limit must lie in [1, {MAX_LIMIT}]"}), 400
    runs = db.session.execute(query.limit(limit)).scalars().all()
    return jsonify({"runs": [run.to_dict() for run in runs]}), 200


@runs_api_bp.route("/<int:run_id>", methods=["GET"])
def get_run(run_id: int):
    """One run including its config and report."""
    run = db.session.get(Run, run_id)
    if run is None:
        return jsonify({"error": "Run not found"}), 404
    return jsonify(run.to_dict(full=True)), 200
