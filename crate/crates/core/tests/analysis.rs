mod common;

use common::data_path;
use tallynet::analysis::{
    discrepancy_stats, load_results, parse_results, vulnerability_report, AnalysisError, FEDERAL,
};
use tallynet::simnet::swiss_preset;
use tallynet::tally::{jid, Decision, MajorityRule, ReferendumSpec};

#[test]
fn maxima_sample_reproduces_every_row() {
    let summary = discrepancy_stats(&load_results(&data_path("canton_maxima.csv")).unwrap());
    assert_eq!(summary.per_canton.len(), 26);
    let rows = [
        ("Vaud", 3974, 177_616, 2.24),
        ("Jura", 548, 20_178, 2.72),
        ("Aargau", 1090, 131_179, 0.83),
        ("Genève", 142, 108_651, 0.13),
        ("Zug", 0, 34_444, 0.0),
    ];
    for (name, votes, total, pct) in rows {
        let s = summary.canton(name).unwrap();
        assert_eq!((s.max_abs_discrepancy, s.total_at_max), (votes, total), "{name}");
        assert!((s.max_relative * 100.0 - pct).abs() <= 0.01, "{name}");
    }
    let fed = summary.federal.as_ref().unwrap();
    assert_eq!(fed.canton, FEDERAL);
    assert_eq!((fed.max_abs_discrepancy, fed.total_at_max), (3843, 2_039_548));
    assert!(summary.to_csv().contains("Vaud,3974,177616,2.24\n"));
}

#[test]
fn geneva_outlier_is_forty_one_percent() {
    let summary = discrepancy_stats(&load_results(&data_path("geneva_2013.csv")).unwrap());
    let g = summary.canton("Genève").unwrap();
    assert_eq!((g.max_abs_discrepancy, g.total_at_max), (44_821, 109_433));
    assert_eq!((g.max_relative * 100.0).round(), 41.0);
}

#[test]
fn empty_input_is_empty_summary() {
    let summary = discrepancy_stats(&parse_results("".as_bytes()).unwrap());
    assert!(summary.per_canton.is_empty() && summary.federal.is_none());
    let header = "referendum_id,date,canton,prelim_yes,prelim_no,final_yes,final_no,final_total\n";
    assert!(parse_results(header.as_bytes()).unwrap().is_empty());
}

#[test]
fn malformed_rows_name_their_row() {
    let text = "referendum_id,date,canton,prelim_yes,prelim_no,final_yes,final_no,final_total\n\
                r1,2019-05-19,Uri,1,2,1,2,3\n\
                r1,2019-05-19,Glarus,x,2,1,2,3\n";
    match parse_results(text.as_bytes()) {
        Err(AnalysisError::Parse { row, .. }) => assert_eq!(row, 3),
        other => panic!("{other:?}"),
    }
}

#[test]
fn vulnerability_against_history() {
    let records = load_results(&data_path("referendums.csv")).unwrap();
    let history = discrepancy_stats(&load_results(&data_path("canton_maxima.csv")).unwrap());
    let tree = swiss_preset().tree;
    let specs = [
        ReferendumSpec::new("rtvg-2015", MajorityRule::PopularOnly),
        ReferendumSpec::new("family-2013", MajorityRule::DoubleMajority),
    ];
    let out = vulnerability_report(&records, &tree, &specs, &history).unwrap();
    let (rtvg, family) = (&out[0], &out[1]);
    assert_eq!((rtvg.target, rtvg.plan.total_flips), (Decision::Rejected, 1825));
    assert!(rtvg.vulnerable, "1825 flips fit inside one canton's historical discrepancy");
    assert_eq!(family.target, Decision::Accepted);
    assert_eq!(family.plan.flips_at(&jid("CH/GR")), 896);
    assert_eq!(family.plan.flips_at(&jid("CH/ZG")), 934);
    assert!(!family.vulnerable, "Graubünden's historical maximum is 690 < 896");
    assert!(rtvg.to_text(&tree).contains("total_flips: 1825"));
}

#[test]
fn missing_canton_is_reported() {
    let records = load_results(&data_path("referendums.csv")).unwrap();
    let partial: Vec<_> = records.into_iter().filter(|r| r.canton != "Uri").collect();
    let tree = swiss_preset().tree;
    let history = discrepancy_stats(&partial);
    let specs = [ReferendumSpec::new("rtvg-2015", MajorityRule::PopularOnly)];
    assert!(matches!(
        vulnerability_report(&partial, &tree, &specs, &history),
        Err(AnalysisError::MissingCanton { .. })
    ));
}
