use std::process::{Command, Output};

fn cachecoder(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cachecoder"))
        .args(args)
        .env_remove("CACHECODER_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn three_user_decentralized_report() {
    let o = cachecoder(&[
        "run",
        "--scheme",
        "decentralized",
        "--K",
        "3",
        "--L",
        "2",
        "--N",
        "3",
        "--q",
        "0.5",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("measured delay: 0.5625"), "{text}");
    assert!(text.contains("measured m_k: 0.5"));
    assert_eq!(text.matches(": OK").count(), 3);
}

#[test]
fn full_cache_reports_zero_delay() {
    let o = cachecoder(&[
        "run", "--scheme", "grouped", "--K", "4", "--L", "2", "--t", "4",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("measured delay: 0 "));
}

#[test]
fn bad_file_length_exits_two() {
    let o = cachecoder(&[
        "run", "--scheme", "mt", "--K", "3", "--L", "2", "--t", "1", "--f", "4",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("min_valid_f=3"), "{}", stderr(&o));
}

#[test]
fn invalid_settings_exit_two() {
    for args in [
        &["run", "--scheme", "mt", "--K", "3", "--L", "4", "--t", "1"][..],
        &[
            "run", "--scheme", "nope", "--K", "3", "--L", "1", "--t", "1",
        ],
        &["run", "--scheme", "mt", "--K", "3", "--L", "1"],
        &["run", "--scheme", "mt", "--K", "4", "--L", "2", "--M", "2"],
        &[
            "audit",
            "--scheme",
            "formulas-only",
            "--K",
            "4",
            "--L",
            "2",
            "--t",
            "2",
        ],
    ] {
        assert_eq!(cachecoder(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn audit_exit_codes() {
    let base = [
        "audit",
        "--scheme",
        "mt",
        "--K",
        "4",
        "--L",
        "2",
        "--t",
        "2",
        "--field-bits",
        "4",
    ];
    let honest = cachecoder(&[&base[..], &["--trials", "1000"]].concat());
    assert_eq!(honest.status.code(), Some(0), "{}", stderr(&honest));
    let ablated = cachecoder(&[&base[..], &["--ablate-keys"]].concat());
    assert_eq!(ablated.status.code(), Some(4));
    assert!(stderr(&ablated).contains("uniformity rejected"));
    let doctored = cachecoder(&[&base[..], &["--inject-key-reuse"]].concat());
    assert_eq!(doctored.status.code(), Some(4));
    assert!(stderr(&doctored).contains("key reuse"));
}

#[test]
fn secure_curve_dominates_insecure_in_sweep() {
    let o = cachecoder(&[
        "formulas",
        "--scheme",
        "mt",
        "--K",
        "8",
        "--N",
        "8",
        "--axis",
        "L=2,4",
        "--axis",
        "M=1,2,3,4,5,6,7,8",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows: Vec<Vec<&str>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 16);
    for r in rows {
        let secure = r[6].parse::<f64>().unwrap_or_else(|_| frac(r[6]));
        let insecure = r[7].parse::<f64>().unwrap_or_else(|_| frac(r[7]));
        assert!(secure >= insecure, "{r:?}");
    }
}

fn frac(s: &str) -> f64 {
    let (a, b) = s.split_once('/').unwrap();
    a.parse::<f64>().unwrap() / b.parse::<f64>().unwrap()
}

#[test]
fn grouped_storage_crosses_at_region_boundary() {
    let o = cachecoder(&[
        "formulas",
        "--scheme",
        "grouped",
        "--K",
        "8",
        "--L",
        "2",
        "--axis",
        "M=2,3,3.2,4,6,8",
    ]);
    let text = stdout(&o);
    let rows: Vec<Vec<String>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    let at = |m: &str| rows.iter().find(|r| r[4] == m).unwrap().clone();
    assert_eq!(at("3.2")[8], at("3.2")[9]);
    let m_k: Vec<f64> = rows
        .iter()
        .map(|r| r[9].parse().unwrap_or_else(|_| frac(&r[9])))
        .collect();
    let m_d: Vec<f64> = rows
        .iter()
        .map(|r| r[8].parse().unwrap_or_else(|_| frac(&r[8])))
        .collect();
    assert!(m_k.windows(2).all(|w| w[1] < w[0]));
    assert!(m_d.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn empty_axis_gives_header_only() {
    let o = cachecoder(&[
        "sweep", "--scheme", "mt", "--K", "4", "--L", "2", "--axis", "M=",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        stdout(&o),
        "scheme,K,L,N,M,t_or_q,delay_secure,delay_insecure,m_d,m_k,dof,region_ok,measured_delay\n"
    );
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "# base\nscheme = mt\nK = 4\nL = 2\nt = 1 # overridden\naxis = seed=1,2\n",
    )
    .unwrap();
    let out = dir.path().join("out.csv");
    let o = cachecoder(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--t",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows, ["mt,4,2,4,2.5,2,0.5,1/3,2,0.5,4,true,0.5"; 2]);
}

#[test]
fn out_of_region_points_are_flagged() {
    let o = cachecoder(&[
        "sweep", "--scheme", "grouped", "--K", "4", "--L", "2", "--axis", "M=1,3",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.lines().nth(1).unwrap().contains(",invalid,"), "{text}");
    assert!(text.lines().nth(2).unwrap().ends_with(",0.5"), "{text}");
}

#[test]
fn sweeps_are_deterministic_across_job_counts() {
    let base = [
        "sweep",
        "--scheme",
        "decentralized",
        "--K",
        "4",
        "--L",
        "2",
        "--placement-mode",
        "bernoulli",
        "--f",
        "600",
    ];
    let args = |jobs: &'static str| {
        [
            &base[..],
            &["--seed", "7", "--jobs", jobs, "--axis", "q=1/4,1/2,3/4"],
        ]
        .concat()
    };
    let one = cachecoder(&args("1"));
    let four = cachecoder(&args("4"));
    assert_eq!(one.status.code(), Some(0), "{}", stderr(&one));
    assert_eq!(one.stdout, four.stdout);
    assert!(!one.stdout.contains(&b'\r'));
}

#[test]
fn environment_seed_is_a_fallback() {
    let args = [
        "sweep",
        "--scheme",
        "decentralized",
        "--K",
        "3",
        "--L",
        "2",
        "--q",
        "1/2",
        "--placement-mode",
        "bernoulli",
        "--f",
        "400",
    ];
    let run = |seed: Option<&str>, extra: &[&str]| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_cachecoder"));
        c.args(args).args(extra).env_remove("CACHECODER_SEED");
        if let Some(s) = seed {
            c.env("CACHECODER_SEED", s);
        }
        c.output().unwrap().stdout
    };
    assert_eq!(run(Some("11"), &[]), run(None, &["--seed", "11"]));
    assert_eq!(
        run(Some("3"), &["--seed", "11"]),
        run(None, &["--seed", "11"])
    );
}
