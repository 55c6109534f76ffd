use roadcast::dataio::{default_holidays, generate_synthetic, aggregate, SynthConfig};
use roadcast::dataset::prepare_dataset;
use roadcast::features::EncodingMode;
use roadcast::evaluation::{evaluate, persistence_baseline};
use roadcast::linalg::Vector;
use roadcast::network::{batch_mse, ModelDims, ModelKind, SequenceWindow};
use roadcast::optimizer::{train, TrainConfig};

fn main() {
    // Overfit invariant at candidate learning rates.
    let dims = ModelDims::for_encoding(EncodingMode::Cyclic);
    let w = SequenceWindow {
        lags: std::array::from_fn(|k| [0.4 + 0.03 * k as f64, 0.7 - 0.04 * k as f64]),
        exo: Vector::from_vec((0..dims.exo_dim).map(|i| 0.5 + 0.3 * ((i as f64) * 0.7).sin()).collect()),
        target: [0.3, 0.8],
    };
    for lr in [1e-3, 5e-4, 3e-4] {
        for kind in [ModelKind::Lstm, ModelKind::ALstm] {
            let mut tc = TrainConfig::new(kind, dims);
            tc.epochs = 200;
            tc.batch_size = 1;
            tc.lr = lr;
            let (params, _) = train(std::slice::from_ref(&w), &[], &tc).unwrap();
            let mse = batch_mse(std::slice::from_ref(&w), &params).unwrap();
            println!("overfit lr {lr} {kind:?}: {mse:.2e} ({})", if mse < 1e-4 { "ok" } else { "FAIL" });
        }
    }

    // Split-3 behavior at those learning rates.
    let cfg = SynthConfig { days: 180, ..SynthConfig::default() };
    let cal = default_holidays(cfg.start_date, cfg.days);
    let s15 = aggregate(&generate_synthetic(&cfg, &cal, 1).unwrap(), 3).unwrap();
    let ds = prepare_dataset(&s15, &cal, EncodingMode::Cyclic, 3).unwrap();
    let (tr, va, te) = ds.split_sets(2).unwrap();
    for lr in [5e-4, 3e-4] {
        let mut tc = TrainConfig::new(ModelKind::Lstm, dims);
        tc.epochs = 100;
        tc.lr = lr;
        let (params, hist) = train(&tr, &va, &tc).unwrap();
        println!("split3 lr {lr}: e100 {:.3} test {:.3} persist {:.3}",
            hist.epochs[99].train_mse * 1000.0,
            evaluate(&params, &te).unwrap(),
            persistence_baseline(&te).unwrap());
    }
}
