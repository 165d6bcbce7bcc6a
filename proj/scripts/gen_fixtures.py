#!/usr/bin/env python3
"""Regenerates the synthetic fixture corpus under fixtures/.

Output is deterministic; the generated files are committed so the C++ tests
never need Python.
"""
import json
import random
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent / "fixtures"
CN_NUM = "一二三四五六七八九十"

FILLER_CN = [
    "处置过程中应保持与调度员的通信畅通，并按规定做好记录。",
    "随车机械师应携带必要的工具和备品，按照作业标准开展检查。",
    "司机应密切关注司机室显示屏的提示信息和列车运行状态。",
    "在确认安全的前提下方可继续运行，严禁盲目操作。",
    "相关信息应及时通报列车长，由列车长做好旅客安抚工作。",
    "故障处理完毕后，应在司机报单中如实填写故障现象和处理结果。",
    "对于无法在途中处理的问题，应申请回库检修。",
    "运行中如遇情况变化，应立即重新评估并报告。",
    "各岗位人员应熟悉本岗位的应急处置流程并定期演练。",
    "夜间作业时应使用照明设备，注意防止人身伤害。",
]
FILLER_EN = [
    "Keep radio contact with the dispatcher throughout and log every action taken.",
    "The onboard mechanic carries the standard tool kit and spare parts for inspection.",
    "Watch the cab display for new fault messages while the train is moving.",
    "Continue only after safety has been confirmed; never operate controls blindly.",
    "Inform the train manager so that passengers can be kept informed.",
    "Record the symptom and the outcome in the driver's report after the event.",
    "Problems that cannot be handled en route are referred to the depot for repair.",
    "Reassess the situation and report again whenever conditions change.",
    "Every crew member should know the emergency procedure for their post and rehearse it.",
    "Use portable lighting at night and take care to avoid personal injury.",
]

EXPERTISE = [
    # trainset, fault, code, symptom, steps (5)
    ("CR400AF", "牵引丢失", "3454", "司机室显示屏提示牵引力丢失，列车速度持续下降",
     ["确认主断路器处于闭合状态", "查看牵引变流器的故障记录", "对故障单元执行复位操作",
      "切除故障牵引单元", "报告调度员后维持降级运行"]),
    ("CR400AF", "速度传感器故障", "2107", "显示屏报速度传感器信号异常，部分轴速度显示跳变",
     ["核对各轴速度显示数值", "确认故障传感器所在车厢和轴位", "在制动控制单元中隔离故障传感器",
      "以限速方式运行至前方站", "通知随车机械师检查传感器插头"]),
    ("CRH380B", "受电弓故障", "1502", "网压显示为零，受电弓升弓指示灯不亮",
     ["确认受电弓风压是否正常", "观察受电弓实际状态", "换用另一架受电弓升弓",
      "检查受电弓供风塞门位置", "必要时请求救援"]),
    ("CRH380B", "制动不缓解", "4120", "缓解指令发出后制动缸压力未下降，显示屏报制动不缓解",
     ["确认制动手柄位置正确", "查看各车制动缸压力", "对不缓解车辆执行强制缓解",
      "关闭该车制动塞门", "按规定限速运行并报告调度员"]),
    ("CR400BF", "车门故障", "6031", "车门状态指示灯闪烁，部分车门无法关闭到位",
     ["确认故障车门的车厢号和门号", "通知列车长到现场查看", "尝试手动关闭故障车门",
      "对该门实施隔离锁闭", "确认门控回路正常后再启动列车"]),
    ("CR400BF", "轴温报警", "5210", "显示屏报某轴轴温超过报警限值",
     ["立即降低运行速度", "查看轴温变化趋势", "在前方站停车后由随车机械师测温",
      "立即停车", "按调度命令限速或甩车处理"]),
    ("CRH5A", "空调故障", "7002", "车厢温度异常，空调机组显示停机",
     ["确认故障空调机组所在车厢", "对空调控制单元执行复位", "开启应急通风",
      "通知列车长疏导旅客至其他车厢", "运行结束后报修"]),
    ("CRH2C", "主断路器跳闸", "1308", "主断路器断开指示灯点亮，牵引和辅助供电中断",
     ["确认网压是否正常", "查看跳闸原因记录", "在允许条件下重新闭合主断路器",
      "不再闭合主断路器", "报告调度员并请求处置指示"]),
    ("CRH380B", "Traction Converter Overtemperature", "3321",
     "the cab display reports converter overtemperature and traction power is reduced",
     ["check the converter cooling fan status", "reduce the traction notch to lower the load",
      "reset the converter once the temperature falls", "isolate the converter if the alarm persists",
      "report to the dispatcher and continue at reduced power"]),
    ("CR400AF", "Wheel Slide Protection Fault", "4410",
     "the wheel slide protection system reports a fault and braking distance may increase",
     ["confirm which car raised the fault", "apply braking earlier than normal",
      "reset the wheel slide control unit", "isolate the affected bogie if the fault returns",
      "observe the speed limit ordered by the dispatcher"]),
    ("CRH5A", "Auxiliary Converter Failure", "3610",
     "auxiliary power is lost in one unit and lighting switches to emergency supply",
     ["identify the failed auxiliary converter", "check the battery voltage",
      "reset the auxiliary converter from the cab", "transfer loads to the healthy unit",
      "request maintenance at the next depot"]),
    ("CR400BF", "Fire Alarm in Passenger Area", "8805",
     "a smoke detector triggers the fire alarm in a passenger car",
     ["stop the train at a safe location outside tunnels and bridges",
      "send the train manager to verify the alarm", "evacuate passengers from the affected car",
      "use the extinguisher if a fire is confirmed", "report to the dispatcher and request emergency support"]),
]

REGULATION = [
    # topic, rule sentence core, extra key terms
    ("过分相", "列车通过分相区时，司机应在断电标前断开主断路器，惰行通过分相区，在合电标后再闭合主断路器",
     ["分相区", "断电标", "合电标", "惰行"]),
    ("临时限速", "接到临时限速调度命令后，司机应核对限速地段起止里程和限速值，在限速地段前完成减速",
     ["调度命令", "限速值", "起止里程", "减速"]),
    ("信号故障", "遇信号机故障显示不明时，司机应立即停车，与车站值班员联系确认后凭调度命令行车",
     ["信号机", "车站值班员", "显示不明", "凭调度命令"]),
    ("紧急制动", "运行中遇危及行车安全的紧急情况时，司机应立即采取紧急制动措施，停车后做好防护并报告",
     ["紧急情况", "防护", "危及行车安全", "停车"]),
    ("调度通信", "司机与调度员通话时应使用标准用语，复诵调度命令内容，确认无误后方可执行",
     ["标准用语", "复诵", "调度员", "执行"]),
    ("大风天气", "遇大风预警时，司机应按调度命令控制列车运行速度，风速超过限值时应停车等待",
     ["大风预警", "风速", "限值", "等待"]),
    ("列车防护", "列车在区间被迫停车后，司机应立即开启防护信号，并通知邻线列车注意运行",
     ["区间", "被迫停车", "防护信号", "邻线列车"]),
    ("非正常行车", "在非正常情况下组织行车时，司机应严格按照调度命令和车站值班员的指示操作",
     ["非正常情况", "组织行车", "指示", "操作"]),
    ("司机交接班", "司机交接班时应当面交接列车技术状态、运行揭示和调度命令，并签字确认",
     ["交接班", "技术状态", "运行揭示", "签字确认"]),
    ("Operating Through a Neutral Section",
     "When approaching a neutral section the driver shall open the main circuit breaker at the power-off sign, coast through the section, and close it again after the power-on sign",
     ["neutral section", "power-off sign", "power-on sign", "coast"]),
    ("Temporary Speed Restriction Orders",
     "On receiving a temporary speed restriction order the driver shall confirm the start and end kilometre posts and complete braking before entering the restricted section",
     ["speed restriction", "kilometre posts", "restricted section", "braking"]),
    ("Train Radio Communication Failure",
     "If train radio communication fails the driver shall stop at the next station and report to the dispatcher by an alternative telephone before proceeding",
     ["train radio", "alternative telephone", "next station", "proceeding"]),
]

LEGAL = [
    # law name, topic, article text core
    ("铁路安全管理条例", "线路安全保护区", "在铁路线路安全保护区内禁止烧荒、放养牲畜、种植影响铁路线路安全和行车瞭望的树木等植物"),
    ("铁路安全管理条例", "机车车辆驾驶人员", "铁路机车车辆的驾驶人员应当参加国务院铁路行业监督管理部门组织的考试，考试合格方可上岗"),
    ("铁路安全管理条例", "运营安全", "铁路运输企业应当加强运输过程中的安全防护，使用的运输工具、装载加固设备以及其他专用设施设备应当符合国家标准"),
    ("铁路安全管理条例", "法律责任", "违反本条例规定，在铁路线路安全保护区内烧荒的，由公安机关责令改正，对单位处以罚款"),
    ("铁路法", "旅客运输", "铁路运输企业应当保证旅客按车票载明的日期、车次乘车，并到达目的站"),
    ("铁路法", "铁路安全与保护", "禁止偷乘货车、攀附行进中的列车或者击打列车，对违反者由公安机关依法处理"),
    ("铁路法", "铁路运输营业", "铁路运输企业应当保证货物运输的安全，对承运的货物在运输过程中发生的灭失、短少、变质、污染或者损坏承担赔偿责任"),
    ("安全生产法", "从业人员的权利", "从业人员发现直接危及人身安全的紧急情况时，有权停止作业或者在采取可能的应急措施后撤离作业场所"),
    ("安全生产法", "安全培训", "生产经营单位应当对从业人员进行安全生产教育和培训，未经安全生产教育和培训合格的从业人员不得上岗作业"),
    ("Railway Safety Act", "Duties of Train Operators",
     "A train operator shall hold a valid certificate issued by the safety authority and shall not operate a train while fatigued or under the influence of alcohol"),
    ("Railway Safety Act", "Accident Reporting",
     "Every railway operator shall report an accident involving death or serious injury to the safety authority without delay and preserve the scene for investigation"),
    ("Railway Safety Act", "Trespass on Railway Property",
     "No person shall enter the track area of an operating railway except at an authorised crossing, and violators may be fined by the competent authority"),
]


def cn_ord(n):
    if n <= 10:
        return CN_NUM[n - 1]
    return "十" + CN_NUM[n - 11]


def is_en(s):
    return all(ord(c) < 128 for c in s)


def pad(rng, en, n):
    pool = FILLER_EN if en else FILLER_CN
    return (" " if en else "").join(rng.choice(pool) for _ in range(n))


def expertise_doc(rng, idx, spec):
    ts, fault, code, symptom, steps = spec
    en = is_en(fault)
    if en:
        title = f"{ts} {fault} Handling Manual"
        key = (f"When {fault.lower()} (fault code {code}) occurs on the {ts}, the driver should first "
               f"{steps[0]}, then {steps[1]}, and {steps[2]}; if that does not help, "
               f"{steps[3]} and {steps[4]}.")
        sections = [
            (f"## Section 1 {ts} {fault} overview",
             f"This manual covers {fault.lower()} on {ts} trainsets, reported as fault code {code}. "
             + pad(rng, True, 6)),
            (f"## Section 2 {fault} symptoms",
             f"Typical symptom: {symptom}. " + pad(rng, True, 8)),
            (f"## Section 3 {fault} handling steps", key + " " + pad(rng, True, 6)),
            (f"## Section 4 {fault} precautions",
             f"Do not repeat the reset more than twice for fault code {code}. " + pad(rng, True, 8)),
            (f"## Section 5 {fault} follow-up",
             f"After {fault.lower()} the onboard mechanic inspects the {ts} equipment. " + pad(rng, True, 6)),
        ]
        question = f"How should the driver handle {fault.lower()} (fault code {code}) on the {ts}?"
    else:
        title = f"{ts}动车组{fault}处理手册"
        key = (f"{ts}动车组发生{fault}（故障代码{code}）时，司机应首先{steps[0]}，然后{steps[1]}，"
               f"并{steps[2]}；若处理无效，应{steps[3]}，{steps[4]}。")
        sections = [
            (f"第一节 {ts}{fault}概述",
             f"本手册适用于{ts}动车组运行中发生的{fault}，故障代码为{code}。" + pad(rng, False, 6)),
            (f"第二节 {ts}{fault}故障现象", f"典型现象为{symptom}。" + pad(rng, False, 8)),
            (f"第三节 {ts}{fault}处置步骤", key + pad(rng, False, 6)),
            (f"第四节 {ts}{fault}注意事项",
             f"同一故障代码{code}连续复位不得超过两次。" + pad(rng, False, 8)),
            (f"第五节 {ts}{fault}后续处理",
             f"{fault}处理完毕后，随车机械师应对{ts}相关设备进行检查。" + pad(rng, False, 6)),
        ]
        question = f"{ts}动车组发生{fault}（故障代码{code}）时司机应如何处理？"
    return title, sections, question, key


def regulation_doc(rng, idx, spec):
    topic, rule, terms = spec
    en = is_en(topic)
    if en:
        title = f"Operating Rules: {topic}"
        key = rule + "."
        sections = [
            (f"Section 1 {topic} scope",
             f"These rules apply to all drivers when dealing with {terms[0]}. " + pad(rng, True, 6)),
            (f"Section 2 {topic} requirements", key + " " + pad(rng, True, 6)),
            (f"Section 3 {topic} related terms",
             f"Drivers must understand {terms[1]}, {terms[2]} and {terms[3]}. " + pad(rng, True, 8)),
            (f"Section 4 {topic} supervision", pad(rng, True, 10)),
        ]
        question = f"What rules must the driver follow for {topic.lower()}?"
    else:
        title = f"行车组织规则：{topic}"
        key = rule + "。"
        sections = [
            (f"第一条 {topic}适用范围", f"本规则适用于涉及{terms[0]}的行车作业。" + pad(rng, False, 6)),
            (f"第二条 {topic}作业要求", key + pad(rng, False, 6)),
            (f"第三条 {topic}相关术语",
             f"司机应掌握{terms[1]}、{terms[2]}和{terms[3]}等概念。" + pad(rng, False, 8)),
            (f"第四条 {topic}监督检查", pad(rng, False, 10)),
        ]
        question = f"{topic}时司机应当遵守哪些规定？"
    return title, sections, question, key


def legal_doc(rng, idx, spec):
    law, topic, article = spec
    en = is_en(law)
    art = 10 + idx * 3
    if en:
        title = f"{law}: {topic}"
        key = article + "."
        sections = [
            (f"Article {art} {topic}", key),
            (f"Article {art + 1} {topic} enforcement",
             f"The competent authority supervises compliance with the provisions on {topic.lower()}. "
             + pad(rng, True, 6)),
            (f"Article {art + 2} {topic} interpretation", pad(rng, True, 8)),
        ]
        question = f"What does the {law} provide about {topic.lower()}?"
    else:
        title = f"《{law}》{topic}"
        key = article + "。"
        sections = [
            (f"第{cn_ord(idx + 1)}条 {topic}", key + pad(rng, False, 4)),
            (f"第{cn_ord(idx + 2)}条 {topic}监督管理",
             f"有关部门应当依法对{topic}相关规定的执行情况进行监督检查。" + pad(rng, False, 6)),
            (f"第{cn_ord(idx + 3)}条 {topic}解释", pad(rng, False, 8)),
        ]
        question = f"《{law}》关于{topic}是如何规定的？"
    return title, sections, question, key


def write_doc(path, title, sections):
    lines = [title, ""]
    for heading, body in sections:
        lines += [heading, body, ""]
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines), encoding="utf-8")


def main():
    rng = random.Random(20240607)
    corpus = ROOT / "corpus"
    manifest, eval_set = {}, []
    groups = [
        ("expertise", "RailwayExpertise", EXPERTISE, expertise_doc),
        ("regulation", "RailwayRegulation", REGULATION, regulation_doc),
        ("legal", "LegalProvision", LEGAL, legal_doc),
    ]
    for folder, category, specs, make in groups:
        for i, spec in enumerate(specs):
            title, sections, question, key = make(rng, i, spec)
            rel = f"{folder}/{folder}_{i + 1:02d}.txt"
            write_doc(corpus / rel, title, sections)
            manifest[rel] = category
            eval_set.append({"id": f"eval-{folder}-{i + 1:02d}", "question": question,
                             "answer": key, "category": category, "source_chunk_id": "",
                             "flags": ["ExamConverted"]})

    (ROOT / "manifest.json").write_text(json.dumps(manifest, ensure_ascii=False, indent=2) + "\n",
                                        encoding="utf-8")
    with open(ROOT / "eval_set.jsonl", "w", encoding="utf-8") as f:
        for row in eval_set:
            f.write(json.dumps(row, ensure_ascii=False) + "\n")

    few_shot = [
        {"question": "CRH380B动车组受电弓无法升起时司机应如何处理？",
         "answer": "司机应确认受电弓风压，换用另一架受电弓升弓，仍无效时报告调度员请求救援。"},
        {"question": "What should the driver do when a door cannot be closed?",
         "answer": "Ask the train manager to check the door, isolate and lock it, and start only after the door loop is proven."},
    ]
    (ROOT / "few_shot.json").write_text(json.dumps(few_shot, ensure_ascii=False, indent=2) + "\n",
                                        encoding="utf-8")

    exam = [
        {"id": "exam-exp-1", "category": "RailwayExpertise", "item_type": "single",
         "stem": "CR400AF动车组牵引丢失故障代码3454复位无效时应采取哪项措施？",
         "options": ["立即紧急制动", "切除故障牵引单元", "继续复位直至成功", "降下全部受电弓"], "key": "B"},
        {"id": "exam-exp-2", "category": "RailwayExpertise", "item_type": "multiple",
         "stem": "CR400AF动车组速度传感器故障时，下列哪些做法正确？",
         "options": ["核对各轴速度显示数值", "隔离故障传感器", "以最高速度运行", "通知随车机械师检查"], "key": "ABD"},
        {"id": "exam-exp-3", "category": "RailwayExpertise", "item_type": "true_false",
         "stem": "轴温持续升高时，司机可以继续按原速度运行。", "options": [], "key": False},
        {"id": "exam-reg-1", "category": "RailwayRegulation", "item_type": "single",
         "stem": "列车通过分相区时，司机应在何处断开主断路器？",
         "options": ["合电标后", "断电标前", "分相区中间", "进站信号机前"], "key": "B"},
        {"id": "exam-reg-2", "category": "RailwayRegulation", "item_type": "multiple",
         "stem": "司机与调度员通话时应做到哪些？",
         "options": ["使用标准用语", "复诵调度命令内容", "确认无误后执行", "省略复诵以节省时间"], "key": "ABC"},
        {"id": "exam-reg-3", "category": "RailwayRegulation", "item_type": "true_false",
         "stem": "遇信号机故障显示不明时，司机应立即停车并与车站值班员联系确认。", "options": [], "key": True},
        {"id": "exam-leg-1", "category": "LegalProvision", "item_type": "single",
         "stem": "铁路机车车辆的驾驶人员上岗前应满足什么条件？",
         "options": ["工作满一年", "考试合格", "年满三十岁", "取得学历证书"], "key": "B"},
        {"id": "exam-leg-2", "category": "LegalProvision", "item_type": "multiple",
         "stem": "在铁路线路安全保护区内禁止下列哪些行为？",
         "options": ["烧荒", "放养牲畜", "种植影响行车瞭望的树木", "按规定巡视线路"], "key": "ABC"},
        {"id": "exam-leg-3", "category": "LegalProvision", "item_type": "true_false",
         "stem": "从业人员发现直接危及人身安全的紧急情况时，有权停止作业。", "options": [], "key": True},
    ]
    with open(ROOT / "exam_bank.jsonl", "w", encoding="utf-8") as f:
        for row in exam:
            f.write(json.dumps(row, ensure_ascii=False) + "\n")


if __name__ == "__main__":
    main()
