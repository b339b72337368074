#!/usr/bin/env python3
"""
MongoDB客户端
按 (participantId, sessionId) 保存注意力报告与驻留记录，支持跨参与者查询驻留时长分布
"""

import logging

from pymongo import MongoClient, ASCENDING
from pymongo.errors import ConnectionFailure, DuplicateKeyError

from db.models import DwellData, ReportRowData, SessionTotalsData

logger = logging.getLogger(__name__)


class MongoDBClient:
    """MongoDB客户端类"""

    def __init__(self, config_manager, client=None):
        """
        初始化MongoDB客户端

        Args:
            config_manager: 配置管理器实例
            client: 已有的 MongoClient（测试时传入替身）
        """
        self.config_manager = config_manager
        self.uri = config_manager.get_mongodb_uri()
        self.db_name = config_manager.get_database_name()
        self.client = client
        self.db = None
        self._connect()

    def _connect(self):
        """连接到MongoDB"""
        try:
            if self.client is None:
                self.client = MongoClient(self.uri, serverSelectionTimeoutMS=5000)
            # 测试连接
            self.client.admin.command('ping')
            self.db = self.client[self.db_name]
            logger.info(f"成功连接到MongoDB数据库: {self.db_name}")
            self._setup_indexes()
        except ConnectionFailure as e:
            logger.error(f"无法连接到MongoDB: {e}")
            raise

    def _setup_indexes(self):
        """设置数据库索引"""
        # 每个会话每个 ROI 一行；会话总计行的 roiLabel 为 None
        self.db.reports.create_index(
            [('participantId', ASCENDING), ('sessionId', ASCENDING), ('roiLabel', ASCENDING)],
            unique=True,
        )
        self.db.dwells.create_index(
            [('participantId', ASCENDING), ('sessionId', ASCENDING), ('roiLabel', ASCENDING), ('entryMs', ASCENDING)],
            unique=True,
        )
        self.db.dwells.create_index([('roiLabel', ASCENDING)])

    def close(self):
        """关闭数据库连接"""
        if self.client:
            self.client.close()
            logger.info("MongoDB连接已关闭")

    def session_exists(self, participant_id, session_id):
        return self.db.reports.find_one({'participantId': participant_id, 'sessionId': session_id}) is not None

    def insert_report(self, report, participant_id, session_id):
        """
        插入一次会话的报告（增量：会话已存在则跳过）

        Returns:
            插入的文档数
        """
        if self.session_exists(participant_id, session_id):
            logger.info(f"会话已存在，跳过: {participant_id}/{session_id}")
            return 0
        documents = [ReportRowData.from_statistics(row, participant_id, session_id) for row in report.rois]
        documents.append(SessionTotalsData.from_report(report, participant_id, session_id))
        count = 0
        for document in documents:
            try:
                self.db.reports.insert_one(document)
                count += 1
            except DuplicateKeyError:
                logger.debug(f"报告行已存在: {participant_id}/{session_id}/{document['roiLabel']}")
        logger.info(f"插入报告 {participant_id}/{session_id}: {count} 条")
        return count

    def insert_dwells(self, dwell_records, participant_id, session_id):
        """插入驻留记录（dwells.jsonl 的记录或 DwellRecord），已存在的跳过"""
        count = 0
        for record in dwell_records:
            if hasattr(record, 'to_dict'):
                record = record.to_dict()
            try:
                self.db.dwells.insert_one(DwellData.from_record(record, participant_id, session_id))
                count += 1
            except DuplicateKeyError:
                continue
        logger.info(f"插入驻留记录 {participant_id}/{session_id}: {count} 条")
        return count

    def query_dwell_distribution(self, roi_label):
        """某个 ROI 在所有参与者上的单次驻留时长（ms），升序"""
        cursor = self.db.dwells.find({'roiLabel': roi_label}, {'dwellMs': 1, '_id': 0})
        return sorted(float(doc['dwellMs']) for doc in cursor if doc.get('dwellMs') is not None)

    def get_participants(self):
        return sorted(p for p in self.db.reports.distinct('participantId') if p is not None)

    # 统计操作
    def get_stats(self):
        """获取数据库统计信息"""
        return {
            'participants_count': len(self.get_participants()),
            'sessions_count': self.db.reports.count_documents({'roiLabel': None}),
            'report_rows_count': self.db.reports.count_documents({'roiLabel': {'$ne': None}}),
            'dwells_count': self.db.dwells.count_documents({}),
            'roi_labels': sorted(l for l in self.db.dwells.distinct('roiLabel') if l is not None),
        }
