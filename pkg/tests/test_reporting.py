from motionbox.evaluation import EvalReport
from motionbox.reporting import plot_eval_report, plot_loss_curves, write_report_csv
from motionbox.trainutil import write_history_csv


def test_loss_curves_and_csv(tmp_path):
    history = [{"step": i, "loss": 1.0 / (i + 1), "kl": 0.1} for i in range(20)]
    write_history_csv(history, tmp_path / "loss.csv")
    plot_loss_curves(history, tmp_path / "loss.png", title="smoke")
    lines = (tmp_path / "loss.csv").read_text().splitlines()
    assert lines[0] == "step,loss,kl"
    assert len(lines) == 21
    assert (tmp_path / "loss.png").stat().st_size > 0


def test_eval_report_figure_and_csv(tmp_path):
    report = EvalReport(scores=[3.0, 2.0, 4.0], mean=3.0, variance=2.0 / 3.0,
                        best=2.0, worst=4.0, ci=(2.2, 3.8), protocol={"num_sets": 3})
    write_report_csv(report, tmp_path / "scores.csv")
    plot_eval_report(report, tmp_path / "fid.png")
    lines = (tmp_path / "scores.csv").read_text().splitlines()
    assert lines[0] == "set,fid"
    assert len(lines) == 4
    assert (tmp_path / "fid.png").stat().st_size > 0


def test_empty_history_noop(tmp_path):
    plot_loss_curves([], tmp_path / "none.png")
    write_history_csv([], tmp_path / "none.csv")
    assert not (tmp_path / "none.png").exists()
    assert not (tmp_path / "none.csv").exists()
