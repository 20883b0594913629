import math

import pytest

import drcf


def toy_dataset():
    rows = []
    for u in range(8):
        for i in range(6):
            if (u + i) % 3:
                rows.append(drcf.RatingTriplet(f"u{u}", f"i{i}", float(1 + (u * i) % 5)))
    return drcf.build_dataset(rows, 5.0)


def test_parse_and_split():
    t = drcf.parse_movielens_text("1::1193::5::978300760\n", "ml1m")
    assert (t[0].user, t[0].item, t[0].rating, t[0].timestamp) == ("1", "1193", 5.0, 978300760)
    with pytest.raises(drcf.DataError):
        drcf.parse_movielens_text("", "ml100k")
    ds = toy_dataset()
    train, test = drcf.split(ds, 0.9, 7)
    assert len(train) + len(test) == len(ds)
    assert len(train) == math.ceil(len(ds) * 0.9)


def test_zero_model_and_gradient_check():
    hp = drcf.Hyperparams()
    hp.d, hp.h = 3, 4
    p = drcf.init_params(2, 2, 5.0, hp)
    p.set_values([0.0] * len(p.values()))
    assert drcf.predict_rating(p, 0, 1) == 2.5
    assert drcf.objective(p, [(0, 0, 1.0)], 0.0) == 0.125

    p = drcf.init_params(2, 2, 5.0, hp)
    batch = [(0, 1, 0.2), (1, 0, 0.9), (1, 1, 0.5)]
    g = drcf.gradient(p, batch, 0.1)
    fd = drcf.fd_gradient(p, batch, 0.1, 1e-6)
    assert max(abs(a - b) / max(1.0, abs(a) + abs(b)) for a, b in zip(g, fd)) < 1e-6


def test_train_save_load(tmp_path):
    ds = toy_dataset()
    train, test = drcf.split(ds, 0.8, 1)
    hp = drcf.Hyperparams()
    hp.d, hp.h, hp.epochs, hp.batch_size = 4, 6, 5, 1000
    params, report = drcf.train_model(train, test, hp)
    assert len(report.epochs) <= 5
    assert report.best_test_rmse == min(r.test_rmse for r in report.epochs)
    assert drcf.evaluate_model(params, test) == report.best_test_rmse

    model = drcf.TrainedModel(params, ds.users, ds.items, train.mean_rating(), hp.lambda_)
    path = tmp_path / "m.drcf"
    drcf.save(model, path)
    assert path.read_text().startswith("DRCF 1\n")
    back = drcf.load(path)
    assert back.params == params
    assert back.predict("u1", "i2") == model.predict("u1", "i2")
    assert back.predict("nobody", "i2") == pytest.approx(train.mean_rating())


def test_slopeone_worked_example():
    ds = drcf.build_dataset(
        [drcf.RatingTriplet("u1", "A", 1.0), drcf.RatingTriplet("u1", "B", 1.5), drcf.RatingTriplet("u2", "A", 2.0)],
        5.0)
    s = drcf.SlopeOneModel.fit(ds)
    a, b = ds.items.find("A"), ds.items.find("B")
    assert s.deviation(b, a) == 0.5
    assert s.predict([(a, 2.0)], b) == 2.5
    assert drcf.rmse([4.0, 3.0], [5.0, 3.0]) == pytest.approx(math.sqrt(0.5))
